#pragma once

#include <string>
#include <vector>

namespace cort {

/// Splits UTF-8 text into lowercase alphanumeric terms.
///
/// A term is a maximal run of word codepoints. ASCII letters and digits are
/// word codepoints and are lowercased; non-ASCII codepoints count as word
/// codepoints unless they fall into common punctuation/symbol blocks
/// (Latin-1 punctuation and General Punctuation). Latin-1 uppercase letters
/// are lowercased. Deterministic; empty text yields an empty list.
std::vector<std::string> tokenize(const std::string& text);

}  // namespace cort
