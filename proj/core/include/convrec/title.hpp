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

#include <string>
#include <string_view>

namespace convrec {

// Canonical form used for exact title matching on both sides of a join:
// NFKC casefolding, a trailing ", The" / ", A" / ", An" moved to the front,
// punctuation removed, and whitespace collapsed to single spaces.
// Idempotent: normalize_title(normalize_title(x)) == normalize_title(x).
std::string normalize_title(std::string_view raw);

}  // namespace convrec
