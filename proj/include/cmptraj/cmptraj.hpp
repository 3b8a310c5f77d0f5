// Copyright 2026 The cmptraj Authors
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

#ifndef CMPTRAJ_CMPTRAJ_HPP
#define CMPTRAJ_CMPTRAJ_HPP

#include "ensemble.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "master.hpp"
#include "operator.hpp"
#include "oracle.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "slh.hpp"
#include "trajectory.hpp"
#include "wavepacket.hpp"

#endif  // CMPTRAJ_CMPTRAJ_HPP
