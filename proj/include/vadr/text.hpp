// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vadr::text {

/// Lowercase, split on ASCII whitespace and punctuation, drop the separators.
/// Bytes >= 0x80 count as word characters so UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view s);

/// Lowercase and collapse whitespace runs to single spaces, trimmed.
std::string normalize_label(std::string_view s);

std::string_view trim(std::string_view s);

bool is_space(char c);

/// Fixed 6-decimal rendering used wherever reals must round-trip bit-stably.
std::string fixed6(double v);

}  // namespace vadr::text
