// Copyright 2026 The Authors.
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

#include <stdexcept>
#include <string>

namespace convrec {

// Bad or inconsistent input data. The CLI maps this to exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or command-line usage (exit code 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The LLM provider failed: transport, timeout, or a non-2xx status.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Replay mode found no cassette entry for a prompt.
class ReplayMissError : public ProviderError {
 public:
  ReplayMissError(const std::string& prompt_hash)
      : ProviderError("replay cache miss for prompt hash " + prompt_hash),
        hash_(prompt_hash) {}
  const std::string& prompt_hash() const { return hash_; }

 private:
  std::string hash_;
};

}  // namespace convrec
