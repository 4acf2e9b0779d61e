// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>

#include "molmimo/error.hpp"

namespace test {

// Code of the molmimo::Error thrown by f, or Ok if it returns.
template <class F>
molmimo::ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const molmimo::Error& e) {
        return e.code();
    }
    return molmimo::ErrorCode::Ok;
}

inline std::string random_message(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz .,?";
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s(len(rng), ' ');
    for (auto& c : s) c = alphabet[pick(rng)];
    return s;
}

} // namespace test
