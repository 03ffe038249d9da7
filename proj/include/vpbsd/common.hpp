/*
 * Copyright 2026 VpbSD Project Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace vpbsd {

enum class ErrorKind {
  InvalidArgument,  // bad user input: flags, paths, parameter ranges
  Dimension,        // tensor/volume shape mismatch
  Config,           // inconsistent run configuration
  Format,           // malformed file on disk
  Contract,         // API precondition violated by caller code
  Runtime,          // training aborts, NaN losses, non-recoverable state
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

// Always-on precondition check (independent of NDEBUG).
#define VPBSD_CHECK(cond, kind, msg)                  \
  do {                                                \
    if (!(cond)) ::vpbsd::fail((kind), (msg));        \
  } while (0)

// SplitMix64; used to derive independent child seeds from a master seed.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) ^ index);
}

// FNV-1a over bytes; stable content hashing for configs and payloads.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

uint32_t crc32(const void* data, size_t n, uint32_t seed = 0);

// Chunked index-space parallelism over [0, n). Writes of different indices
// must not alias; result is then identical for any thread count.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& body);

int num_threads();
void set_num_threads(int n);

std::string format_hex64(uint64_t v);

}  // namespace vpbsd
