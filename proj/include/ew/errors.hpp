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

#include <stdexcept>
#include <string>

namespace ew {

/// Base class of every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define EW_DEFINE_ERROR(Name)             \
  struct Name : Error {                   \
    using Error::Error;                   \
    Name() : Error(#Name) {}              \
  }

// Data model / ingest
EW_DEFINE_ERROR(NoRatings);
EW_DEFINE_ERROR(NonMonotonicTime);  // reported as a warning, never thrown
EW_DEFINE_ERROR(CorpusLayoutError);
EW_DEFINE_ERROR(ZeroDuration);

// Feature extraction
EW_DEFINE_ERROR(NoVideo);
EW_DEFINE_ERROR(NoAudio);
EW_DEFINE_ERROR(BackendFailure);
EW_DEFINE_ERROR(DimensionMismatch);

// Modeling
EW_DEFINE_ERROR(InsufficientData);
EW_DEFINE_ERROR(DegenerateLabels);
EW_DEFINE_ERROR(OutOfRange);
EW_DEFINE_ERROR(MissingTrainPerformance);

// Evaluation
EW_DEFINE_ERROR(ConstantInput);
EW_DEFINE_ERROR(TooFewLessons);
EW_DEFINE_ERROR(NoDoubleRatedSegments);

// Explanation
EW_DEFINE_ERROR(EmptyBackground);

// LLM annotation
EW_DEFINE_ERROR(PromptTooLong);
EW_DEFINE_ERROR(ServiceUnavailable);
EW_DEFINE_ERROR(AuthError);
EW_DEFINE_ERROR(ParseFailure);

#undef EW_DEFINE_ERROR

/// Transcript line that does not match the `[hh:mm:ss] SPEAKER: text` shape.
struct ParseError : Error {
  int line_no;
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_no(line) {}
};

}  // namespace ew
