#pragma once

#include <optional>
#include <string_view>
#include <vector>

// Repository data files compiled into the library (generated at configure
// time from data/ and protocols/).
namespace desmine::embedded {

std::string_view english_stopwords();
std::string_view domain_stopwords();
std::string_view references_json();

std::optional<std::string_view> preset(std::string_view name);
std::vector<std::string_view> preset_names();

}  // namespace desmine::embedded
