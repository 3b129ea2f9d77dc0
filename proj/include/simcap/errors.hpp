// Copyright 2026 The simcap Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace simcap {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

#define SIMCAP_DEFINE_ERROR(name)            \
    class name : public Error {              \
       public:                               \
        using Error::Error;                  \
    }

SIMCAP_DEFINE_ERROR(NotBellDiagonal);
SIMCAP_DEFINE_ERROR(InvalidDensity);
SIMCAP_DEFINE_ERROR(InvalidWeights);
SIMCAP_DEFINE_ERROR(OutOfRange);
SIMCAP_DEFINE_ERROR(RegimeError);
SIMCAP_DEFINE_ERROR(DomainError);
SIMCAP_DEFINE_ERROR(InvalidEnsemble);
SIMCAP_DEFINE_ERROR(ConfigError);
SIMCAP_DEFINE_ERROR(EmptyCounts);
SIMCAP_DEFINE_ERROR(ParseError);

// Raised when an invariant the math guarantees is observed to fail.
SIMCAP_DEFINE_ERROR(InvariantViolation);

#undef SIMCAP_DEFINE_ERROR

}  // namespace simcap
