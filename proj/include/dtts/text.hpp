// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dtts/aligner.hpp"

namespace dtts {

/// Splits a UTF-8 string into codepoint strings. Invalid continuation bytes
/// are taken as single-byte symbols.
inline std::vector<std::string> utf8_split(const std::string& s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    if ((b & 0x80) == 0)
      len = 1;
    else if ((b & 0xE0) == 0xC0)
      len = 2;
    else if ((b & 0xF0) == 0xE0)
      len = 3;
    else if ((b & 0xF8) == 0xF0)
      len = 4;
    if (i + len > s.size()) len = 1;
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

/// Symbol substitution/deletion table applied to tokenized input before
/// vocabulary lookup. Idempotent: no output symbol is itself a key.
struct SubstitutionTable {
  // value = replacement symbol; empty optional = delete the symbol.
  std::unordered_map<std::string, std::optional<std::string>> rules;

  std::vector<std::string> apply(const std::vector<std::string>& symbols) const {
    std::vector<std::string> out;
    out.reserve(symbols.size());
    for (const auto& s : symbols) {
      auto it = rules.find(s);
      if (it == rules.end()) {
        out.push_back(s);
      } else if (it->second) {
        out.push_back(*it->second);
      }  // else: deleted
    }
    return out;
  }

  static SubstitutionTable standard() {
    SubstitutionTable t;
    t.rules["x"] = "k";
    t.rules["\xC3\xA7"] = "k";      // c-cedilla
    t.rules["\xC9\xAC"] = "l";      // belted l
    t.rules["\xCA\xB2"] = "j";      // superscript j
    t.rules[";"] = ".";
    t.rules["\xE2\x80\x94"] = ".";  // em dash
    t.rules["\xC2\xA1"] = std::nullopt;  // inverted exclamation: removed
    t.rules["r"] = std::nullopt;
    t.rules["~"] = std::nullopt;
    t.rules["\""] = std::nullopt;
    return t;
  }
};

struct Vocabulary {
  std::unordered_map<std::string, int> symbol_to_id;
  int silence_id = 0;
  int size = 0;
};

/// Substitutes symbols, wraps the sequence in silence tokens, looks up ids and
/// pads to `pad_to`. Unknown symbols (after substitution) are an error.
inline TokenSequence preprocess_tokens(const std::vector<std::string>& raw_symbols, const Vocabulary& vocab,
                                       const SubstitutionTable& table, int pad_to) {
  auto symbols = table.apply(raw_symbols);
  std::vector<int> ids;
  ids.reserve(symbols.size() + 2);
  ids.push_back(vocab.silence_id);
  for (const auto& s : symbols) {
    auto it = vocab.symbol_to_id.find(s);
    if (it == vocab.symbol_to_id.end())
      throw std::domain_error("preprocess_tokens: symbol '" + s + "' not in vocabulary");
    ids.push_back(it->second);
  }
  ids.push_back(vocab.silence_id);
  TokenSequence seq;
  seq.true_length = int(ids.size());
  if (seq.true_length > pad_to)
    throw std::invalid_argument("preprocess_tokens: sequence of length " + std::to_string(seq.true_length) +
                                " exceeds padded length " + std::to_string(pad_to));
  ids.resize(size_t(pad_to), vocab.silence_id);
  seq.ids = std::move(ids);
  seq.vocab_size = vocab.size;
  return seq;
}

inline TokenSequence preprocess_tokens(const std::string& raw_utf8, const Vocabulary& vocab,
                                       const SubstitutionTable& table, int pad_to) {
  return preprocess_tokens(utf8_split(raw_utf8), vocab, table, pad_to);
}

}  // namespace dtts
