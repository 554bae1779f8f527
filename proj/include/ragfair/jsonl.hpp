#pragma once

#include <functional>
#include <string>

#include <json.hpp>

namespace ragfair {

// Streams one parsed object per non-empty line. Parse failures raise
// ConfigError naming the line; missing files raise IoError.
void for_each_jsonl(const std::string& path,
                    const std::function<void(const nlohmann::json&, int line)>& fn);

void write_text_file(const std::string& path, const std::string& bytes);
std::string read_text_file(const std::string& path);

} // namespace ragfair
