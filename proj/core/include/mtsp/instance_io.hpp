#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtsp/domain.hpp"

namespace mtsp {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& doc);

/// One compact JSON document, no trailing newline.
std::string write_instance(const Instance& inst);
Instance parse_instance(const std::string& text);

/// Newline-delimited instance documents.
void write_dataset(const std::filesystem::path& path, const std::vector<Instance>& instances);
std::vector<Instance> read_dataset(const std::filesystem::path& path);

}  // namespace mtsp
