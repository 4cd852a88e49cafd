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

#ifndef DPDI_DPDI_HPP_
#define DPDI_DPDI_HPP_

#include "dpdi/calibration.hpp"
#include "dpdi/couplings.hpp"
#include "dpdi/distribution.hpp"
#include "dpdi/errors.hpp"
#include "dpdi/estimation.hpp"
#include "dpdi/mechanisms.hpp"
#include "dpdi/optim.hpp"
#include "dpdi/properties.hpp"
#include "dpdi/rng.hpp"
#include "dpdi/selection.hpp"
#include "dpdi/testing.hpp"

#endif  // DPDI_DPDI_HPP_
