// Copyright 2026 the squatwatch authors
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

// Checksummed little-endian readers and writers shared by the model and index
// file formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "squatwatch/errors.hpp"

static_assert(std::endian::native == std::endian::little, "binary files are little-endian");

namespace squatwatch::detail {

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    template <class T>
    void pod(const T& v) {
        raw(&v, sizeof(T));
    }
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            sum_ ^= b[i];
            sum_ *= 1099511628211ull;
        }
    }
    void str(const std::string& s) {
        pod(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    std::uint64_t checksum() const { return sum_; }

private:
    std::ostream& out_;
    std::uint64_t sum_ = 1469598103934665603ull;
};

class Reader {
public:
    Reader(std::istream& in, const std::string& name) : in_(in), name_(name) {}
    template <class T>
    T pod() {
        T v{};
        raw(&v, sizeof(T));
        return v;
    }
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw Error(ErrorCode::FormatVersionMismatch, "truncated file " + name_);
        }
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            sum_ ^= b[i];
            sum_ *= 1099511628211ull;
        }
    }
    std::string str(std::size_t max_len) {
        auto n = pod<std::uint32_t>();
        if (n > max_len) throw Error(ErrorCode::FormatVersionMismatch, "corrupt string length in " + name_);
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }
    std::uint64_t checksum() const { return sum_; }

private:
    std::istream& in_;
    std::string name_;
    std::uint64_t sum_ = 1469598103934665603ull;
};

}  // namespace squatwatch::detail
