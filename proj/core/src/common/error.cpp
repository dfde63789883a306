// Copyright 2026 The milpilot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "milpilot/error.hpp"

namespace milpilot {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "validation_error";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kShape: return "shape_error";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kMissingFeature: return "missing_feature";
    case ErrorCode::kEmptyBatch: return "empty_batch";
    case ErrorCode::kNumeric: return "numeric_error";
    case ErrorCode::kIntegrity: return "integrity_error";
    case ErrorCode::kConfiguration: return "configuration_error";
    case ErrorCode::kUndefinedMetric: return "undefined_metric";
    case ErrorCode::kGuardrail: return "guardrail_violation";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kApprovalRequired: return "approval_required";
    case ErrorCode::kStageFailure: return "stage_failure";
  }
  return "unknown";
}

}  // namespace milpilot
