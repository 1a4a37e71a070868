// Copyright 2026 The PolyQD Authors.
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

/// \file polyqd/polyqd.hpp
/// \brief Umbrella header.

#ifndef POLYQD_POLYQD_HPP
#define POLYQD_POLYQD_HPP

#include "polyqd/archive.hpp"
#include "polyqd/autoencoder.hpp"
#include "polyqd/autove.hpp"
#include "polyqd/config.hpp"
#include "polyqd/evaluation.hpp"
#include "polyqd/experiments.hpp"
#include "polyqd/geometry.hpp"
#include "polyqd/local_search.hpp"
#include "polyqd/metrics.hpp"
#include "polyqd/nsga2.hpp"
#include "polyqd/rls.hpp"
#include "polyqd/sampling.hpp"
#include "polyqd/svg.hpp"
#include "polyqd/ve.hpp"

#endif  // POLYQD_POLYQD_HPP
