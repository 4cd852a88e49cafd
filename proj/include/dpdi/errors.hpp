// Copyright 2026 The dpdi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPDI_ERRORS_HPP_
#define DPDI_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dpdi {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DPDI_DEFINE_ERROR(Name)                                 \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

DPDI_DEFINE_ERROR(InvalidParameter);
DPDI_DEFINE_ERROR(DimensionMismatch);
DPDI_DEFINE_ERROR(AbsoluteContinuityViolation);
DPDI_DEFINE_ERROR(InvalidBudget);
DPDI_DEFINE_ERROR(TooLarge);
DPDI_DEFINE_ERROR(InsufficientSamples);
DPDI_DEFINE_ERROR(EmptyHistogram);
DPDI_DEFINE_ERROR(EmptyInput);
DPDI_DEFINE_ERROR(EmptyDataset);
DPDI_DEFINE_ERROR(GroupTooSmall);
DPDI_DEFINE_ERROR(ProtocolViolation);
DPDI_DEFINE_ERROR(ConfigError);
DPDI_DEFINE_ERROR(CalibrationFailed);

#undef DPDI_DEFINE_ERROR

}  // namespace dpdi

#endif  // DPDI_ERRORS_HPP_
