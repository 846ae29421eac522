#pragma once

// Vocabulary with fixed reserved ids, plus tokenization and the padding /
// indexing contract shared by the encoder and decoder.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentrav/errors.hpp"

namespace sentrav {

class Vocabulary {
  public:
    static constexpr int pad_id = 0;
    static constexpr int sos_id = 1;
    static constexpr int eos_id = 2;
    static constexpr int unk_id = 3;

    Vocabulary() {
        add("<pad>");
        add("<sos>");
        add("<eos>");
        add("<unk>");
    }

    // Returns the id, inserting the token if new.
    int add(const std::string& token) {
        auto it = index_.find(token);
        if (it != index_.end()) return it->second;
        const int id = static_cast<int>(tokens_.size());
        index_.emplace(token, id);
        tokens_.push_back(token);
        return id;
    }

    // Id of a token, or unk_id when absent.
    int id_of(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? unk_id : it->second;
    }

    bool contains(const std::string& token) const { return index_.count(token) > 0; }

    const std::string& token_of(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
            throw IndexError("Vocabulary: id " + std::to_string(id) + " out of range");
        return tokens_[static_cast<std::size_t>(id)];
    }

    std::size_t size() const { return tokens_.size(); }

    const std::vector<std::string>& tokens() const { return tokens_; }

    std::string detokenize(const std::vector<int>& ids) const {
        std::string out;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i > 0) out += ' ';
            out += token_of(ids[i]);
        }
        return out;
    }

  private:
    std::unordered_map<std::string, int> index_;
    std::vector<std::string> tokens_;
};

// Lowercase, whitespace-delimited, ASCII punctuation detached into its own
// tokens. Bytes >= 0x80 are kept inside words so multi-byte characters
// survive untouched.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            out.push_back(word);
            word.clear();
        }
    };
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (c >= 0x80 || std::isalnum(c)) {
            word += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
        } else if (std::isspace(c)) {
            flush();
        } else {
            flush();
            out.push_back(std::string(1, static_cast<char>(c)));
        }
    }
    flush();
    return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += ' ';
        out += tokens[i];
    }
    return out;
}

struct PaddedSentence {
    std::vector<int> encoder_ids;   // length exactly max_len, PAD-filled
    std::vector<int> decoder_target; // at most max_len ids, ends with EOS, no padding
};

// Same contract as pad_and_index for sequences that are already indexed.
inline PaddedSentence pad_ids(const std::vector<int>& ids, std::size_t max_len = 30) {
    if (max_len < 1) throw InputError("pad_ids: max_len must be >= 1");
    PaddedSentence out;
    const std::size_t keep = std::min(ids.size(), max_len - 1);
    out.decoder_target.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep));
    out.decoder_target.push_back(Vocabulary::eos_id);

    out.encoder_ids.assign(max_len, Vocabulary::pad_id);
    const std::size_t enc_keep = std::min(ids.size(), max_len);
    for (std::size_t i = 0; i < enc_keep; ++i) out.encoder_ids[i] = ids[i];
    return out;
}

// Maps tokens to ids (UNK for out-of-vocabulary), truncates to max_len-1 and
// appends EOS for the decoder target, and PAD-fills to max_len for the
// encoder input.
inline PaddedSentence pad_and_index(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                                    std::size_t max_len = 30) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.id_of(t));
    return pad_ids(ids, max_len);
}

} // namespace sentrav
