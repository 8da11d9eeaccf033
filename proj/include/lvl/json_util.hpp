#pragma once

#include <json.hpp>
#include <string>

#include "lvl/errors.hpp"

namespace lvl::jsonu {

using ordered_json = nlohmann::ordered_json;

// Parses a document; syntax errors become ParseError naming source and line.
nlohmann::json parse_document(const std::string& text, const std::string& source);

// Strict field access: ParseError naming the dotted path on absence or type
// mismatch.
const nlohmann::json& require(const nlohmann::json& obj, const std::string& key,
                              const std::string& path, const std::string& source);
double get_number(const nlohmann::json& obj, const std::string& key, const std::string& path,
                  const std::string& source);
std::int64_t get_int(const nlohmann::json& obj, const std::string& key, const std::string& path,
                     const std::string& source);
std::string get_string(const nlohmann::json& obj, const std::string& key,
                       const std::string& path, const std::string& source);
const nlohmann::json& get_array(const nlohmann::json& obj, const std::string& key,
                                const std::string& path, const std::string& source,
                                std::size_t expected_size = 0);

}  // namespace lvl::jsonu
