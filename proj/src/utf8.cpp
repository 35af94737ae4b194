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

#include "cbot/utf8.hpp"

#include <array>
#include <unordered_map>

namespace cbot::utf8 {
namespace {

struct Family {
  char base;
  std::string_view lower;
  std::string_view upper;
};

// Lower and upper strings list the same letters in the same order.
constexpr std::array<Family, 7> kFamilies = {{
    {'a', "àáảãạăằắẳẵặâầấẩẫậ", "ÀÁẢÃẠĂẰẮẲẴẶÂẦẤẨẪẬ"},
    {'e', "èéẻẽẹêềếểễệ", "ÈÉẺẼẸÊỀẾỂỄỆ"},
    {'i', "ìíỉĩị", "ÌÍỈĨỊ"},
    {'o', "òóỏõọôồốổỗộơờớởỡợ", "ÒÓỎÕỌÔỒỐỔỖỘƠỜỚỞỠỢ"},
    {'u', "ùúủũụưừứửữự", "ÙÚỦŨỤƯỪỨỬỮỰ"},
    {'y', "ỳýỷỹỵ", "ỲÝỶỸỴ"},
    {'d', "đ", "Đ"},
}};

struct Tables {
  std::unordered_map<char32_t, char32_t> lower;
  std::unordered_map<char32_t, char32_t> fold;

  Tables() {
    for (const auto& fam : kFamilies) {
      auto lo = decode(fam.lower);
      auto up = decode(fam.upper);
      const char32_t base_lo = static_cast<char32_t>(fam.base);
      const char32_t base_up = static_cast<char32_t>(fam.base - 'a' + 'A');
      for (std::size_t i = 0; i < lo.size() && i < up.size(); ++i) {
        lower[up[i]] = lo[i];
        fold[lo[i]] = base_lo;
        fold[up[i]] = base_up;
      }
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

}  // namespace

std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra;
    char32_t cp;
    if (c < 0x80) {
      extra = 0;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + extra >= s.size() && extra > 0) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

std::string encode(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) out += encode(cp);
  return out;
}

bool valid(std::string_view s) {
  for (char32_t cp : decode(s))
    if (cp == 0xFFFD) return false;
  return true;
}

std::size_t length(std::string_view s) { return decode(s).size(); }

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + ('a' - 'A');
  const auto& t = tables().lower;
  auto it = t.find(cp);
  return it == t.end() ? cp : it->second;
}

char32_t fold(char32_t cp) {
  const auto& t = tables().fold;
  auto it = t.find(cp);
  return it == t.end() ? cp : it->second;
}

std::string to_lower(std::string_view s) {
  auto cps = decode(s);
  for (auto& cp : cps) cp = to_lower(cp);
  return encode(cps);
}

std::string fold(std::string_view s) {
  auto cps = decode(s);
  for (auto& cp : cps) cp = fold(cp);
  return encode(cps);
}

std::string fold_lower(std::string_view s) {
  auto cps = decode(s);
  for (auto& cp : cps) cp = fold(to_lower(cp));
  return encode(cps);
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace cbot::utf8
