// SPDX-License-Identifier: Apache-2.0
//
// jrcup - active-RIS joint calibration and user positioning toolkit
// Copyright (C) 2026 jrcup contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef JRCUP_JRCUP_HPP
#define JRCUP_JRCUP_HPP

#include "jrcup/channel.hpp"
#include "jrcup/crlb.hpp"
#include "jrcup/esprit.hpp"
#include "jrcup/experiments.hpp"
#include "jrcup/geometry.hpp"
#include "jrcup/localize.hpp"
#include "jrcup/model.hpp"
#include "jrcup/refine.hpp"
#include "jrcup/scenario.hpp"
#include "jrcup/tensor.hpp"

#endif  // JRCUP_JRCUP_HPP
