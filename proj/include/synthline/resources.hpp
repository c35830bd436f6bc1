#pragma once

#include <string_view>

// Shipped data files compiled into the library (see cmake/EmbedResources.cmake).
namespace synthline::resources {

std::string_view feature_model_json();
std::string_view template_version();
std::string_view generation_system();
std::string_view generation_user();
std::string_view response_single();
std::string_view response_array();
std::string_view critic();
std::string_view update();

}  // namespace synthline::resources
