// Copyright 2026 The ewscore Authors
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

namespace ew {

/// Hex digest of SHA-256(data). Used for cache keys and config provenance.
std::string sha256_hex(const std::string& data);

/// First 16 hex chars of the digest; enough for file-name keys.
std::string sha256_hex16(const std::string& data);

}  // namespace ew
