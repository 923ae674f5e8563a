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

#include "opo/error.hpp"

namespace opo {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonPositiveLossRate: return "NonPositiveLossRate";
        case ErrorCode::NegativeCoupling: return "NegativeCoupling";
        case ErrorCode::AsymmetricParams: return "AsymmetricParams";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::MarginalDrive: return "MarginalDrive";
        case ErrorCode::WrongRegime: return "WrongRegime";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::DimensionCap: return "DimensionCap";
        case ErrorCode::CutoffSaturation: return "CutoffSaturation";
        case ErrorCode::NotAtSteadyState: return "NotAtSteadyState";
        case ErrorCode::InsufficientEnsemble: return "InsufficientEnsemble";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what, std::optional<int> index,
             std::optional<double> time)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code),
      index_(index),
      time_(time) {}

}  // namespace opo
