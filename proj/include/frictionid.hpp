// Copyright 2026 The frictionid Authors
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

#include "frictionid/commands.hpp"
#include "frictionid/config.hpp"
#include "frictionid/csv.hpp"
#include "frictionid/dynamics.hpp"
#include "frictionid/error.hpp"
#include "frictionid/friction.hpp"
#include "frictionid/library.hpp"
#include "frictionid/model_io.hpp"
#include "frictionid/mpc.hpp"
#include "frictionid/nlreg.hpp"
#include "frictionid/parallel.hpp"
#include "frictionid/qp.hpp"
#include "frictionid/regression.hpp"
#include "frictionid/signals.hpp"
#include "frictionid/simulation.hpp"
#include "frictionid/sindy.hpp"
#include "frictionid/trajectory.hpp"
#include "frictionid/version.hpp"
