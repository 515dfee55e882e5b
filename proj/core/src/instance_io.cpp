#include "mtsp/instance_io.hpp"

#include <fstream>
#include <set>

namespace mtsp {

using nlohmann::json;

json to_json(const Instance& inst) {
  json customers = json::array();
  for (const Customer& c : inst.customers) {
    customers.push_back({{"id", c.id}, {"x", c.x}, {"y", c.y}, {"s", c.s}, {"t", c.t}});
  }
  return json{{"n", inst.n()},
              {"m", inst.m},
              {"beta", inst.beta},
              {"seed", inst.seed},
              {"depot", {{"x", inst.depot.x}, {"y", inst.depot.y}, {"open", inst.depot.open}, {"close", inst.depot.close}}},
              {"customers", std::move(customers)}};
}

namespace {

double number(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  if (!it->is_number()) throw ParseError(where + ": field '" + key + "' is not a number");
  return it->get<double>();
}

template <class Int>
Int integer(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  if (!it->is_number_integer()) throw ParseError(where + ": field '" + key + "' is not an integer");
  return it->get<Int>();
}

}  // namespace

Instance instance_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("instance: document is not a JSON object");
  Instance inst;
  const auto n = integer<long long>(doc, "n", "instance");
  inst.m = integer<int>(doc, "m", "instance");
  inst.beta = number(doc, "beta", "instance");
  inst.seed = integer<std::uint64_t>(doc, "seed", "instance");

  auto depot = doc.find("depot");
  if (depot == doc.end() || !depot->is_object()) throw ParseError("instance: missing depot");
  inst.depot.x = number(*depot, "x", "depot");
  inst.depot.y = number(*depot, "y", "depot");
  inst.depot.open = number(*depot, "open", "depot");
  inst.depot.close = number(*depot, "close", "depot");

  auto customers = doc.find("customers");
  if (customers == doc.end() || !customers->is_array()) throw ParseError("instance: missing customers array");
  if (static_cast<long long>(customers->size()) != n) {
    throw ParseError("instance: n = " + std::to_string(n) + " but " + std::to_string(customers->size()) +
                     " customer records");
  }
  std::set<int> ids;
  std::vector<Customer> parsed;
  for (std::size_t k = 0; k < customers->size(); ++k) {
    const json& rec = (*customers)[k];
    const std::string where = "customer record " + std::to_string(k);
    if (!rec.is_object()) throw ParseError(where + ": not an object");
    Customer c;
    c.id = integer<int>(rec, "id", where);
    c.x = number(rec, "x", where);
    c.y = number(rec, "y", where);
    c.s = number(rec, "s", where);
    c.t = number(rec, "t", where);
    if (!ids.insert(c.id).second) throw ParseError("duplicate id " + std::to_string(c.id));
    if (c.s > c.t) throw ParseError("window inverted at id " + std::to_string(c.id));
    parsed.push_back(c);
  }
  inst.customers.resize(parsed.size());
  for (const Customer& c : parsed) {
    if (c.id < 0 || static_cast<std::size_t>(c.id) >= parsed.size()) {
      throw ParseError("customer id " + std::to_string(c.id) + " outside 0..n-1");
    }
    inst.customers[static_cast<std::size_t>(c.id)] = c;
  }
  try {
    inst.validate();
  } catch (const ContractError& e) {
    throw ParseError(std::string("instance: ") + e.what());
  }
  return inst;
}

std::string write_instance(const Instance& inst) { return to_json(inst).dump(); }

Instance parse_instance(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("instance: malformed JSON: ") + e.what());
  }
  return instance_from_json(doc);
}

void write_dataset(const std::filesystem::path& path, const std::vector<Instance>& instances) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const Instance& inst : instances) out << write_instance(inst) << '\n';
}

std::vector<Instance> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::vector<Instance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_instance(line));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mtsp
