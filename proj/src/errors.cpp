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

#include "squatwatch/errors.hpp"

namespace squatwatch {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedName: return "malformed_name";
        case ErrorCode::UnknownRegistry: return "unknown_registry";
        case ErrorCode::IoFailure: return "io_failure";
        case ErrorCode::EmptySnapshot: return "empty_snapshot";
        case ErrorCode::NoSnapshot: return "no_snapshot";
        case ErrorCode::SignalMissing: return "signal_missing";
        case ErrorCode::EmptyCorpus: return "empty_corpus";
        case ErrorCode::InvalidParams: return "invalid_params";
        case ErrorCode::MissingComponent: return "missing_component";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::FormatVersionMismatch: return "format_version_mismatch";
        case ErrorCode::EmptyInput: return "empty_input";
        case ErrorCode::EmptyIndex: return "empty_index";
        case ErrorCode::EmptyString: return "empty_string";
        case ErrorCode::IndexNotBuilt: return "index_not_built";
        case ErrorCode::UnknownSuspect: return "unknown_suspect";
        case ErrorCode::JudgeUnavailable: return "judge_unavailable";
        case ErrorCode::MalformedJudgeOutput: return "malformed_judge_output";
        case ErrorCode::DegenerateLabels: return "degenerate_labels";
        case ErrorCode::EmptyDataset: return "empty_dataset";
        case ErrorCode::MissingInfrastructure: return "missing_infrastructure";
        case ErrorCode::PortInUse: return "port_in_use";
        case ErrorCode::AlertNotFound: return "alert_not_found";
        case ErrorCode::InvalidTransition: return "invalid_transition";
        case ErrorCode::InvalidArgument: return "invalid_argument";
    }
    return "unknown";
}

}  // namespace squatwatch
