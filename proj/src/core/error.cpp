/**
 * Copyright 2026 The TTA Bench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tta/core/error.hpp"

namespace tta {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kArchitectureMismatch: return "ArchitectureMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNegativeVariance: return "NegativeVariance";
    case ErrorCode::kUnknownGroup: return "UnknownGroup";
    case ErrorCode::kUnknownLayer: return "UnknownLayer";
    case ErrorCode::kInvalidAlpha: return "InvalidAlpha";
    case ErrorCode::kEmptyCell: return "EmptyCell";
    case ErrorCode::kExhaustedSlot: return "ExhaustedSlot";
    case ErrorCode::kUnknownCorruption: return "UnknownCorruption";
    case ErrorCode::kInvalidCorrelation: return "InvalidCorrelation";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kNoNormStats: return "NoNormStats";
    case ErrorCode::kNoNormAffine: return "NoNormAffine";
    case ErrorCode::kNonLinearHead: return "NonLinearHead";
    case ErrorCode::kNoAuxHead: return "NoAuxHead";
    case ErrorCode::kUnknownMethod: return "UnknownMethod";
    case ErrorCode::kUnknownHyperparameter: return "UnknownHyperparameter";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kMissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::kIncompleteGrid: return "IncompleteGrid";
    case ErrorCode::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::kCorruptRecord: return "CorruptRecord";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace tta
