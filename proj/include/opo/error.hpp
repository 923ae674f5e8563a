// Copyright 2026 The opo-cascade Authors
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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace opo {

enum class ErrorCode {
    NonPositiveLossRate,
    NegativeCoupling,
    AsymmetricParams,
    ShapeMismatch,
    MarginalDrive,
    WrongRegime,
    NoConvergence,
    NonFinite,
    DimensionCap,
    CutoffSaturation,
    NotAtSteadyState,
    InsufficientEnsemble,
    InvalidConfig,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library. `index` carries the offending mode
/// for per-mode parameter errors; `time` carries the simulation time for
/// integration failures.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what, std::optional<int> index = std::nullopt,
          std::optional<double> time = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    std::optional<int> index() const noexcept { return index_; }
    std::optional<double> time() const noexcept { return time_; }

private:
    ErrorCode code_;
    std::optional<int> index_;
    std::optional<double> time_;
};

}  // namespace opo
