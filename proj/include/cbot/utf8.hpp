// Copyright 2026 The cbot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers with built-in case and diacritic tables for Vietnamese.
namespace cbot::utf8 {

// Decodes to code points. Invalid bytes decode as U+FFFD.
std::vector<char32_t> decode(std::string_view s);
std::string encode(char32_t cp);
std::string encode(const std::vector<char32_t>& cps);

bool valid(std::string_view s);
std::size_t length(std::string_view s);

char32_t to_lower(char32_t cp);
// Strips tone marks and vowel diacritics; đ/Đ become d/D. Case is kept.
char32_t fold(char32_t cp);

std::string to_lower(std::string_view s);
std::string fold(std::string_view s);
// Lowercase then fold.
std::string fold_lower(std::string_view s);

bool is_ascii_space(char c);

}  // namespace cbot::utf8
