// Copyright 2026 The lesion-dcgan Authors
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


// Umbrella header for the whole library.

#pragma once

#include "dcgan/adam.hpp"
#include "dcgan/binary_io.hpp"
#include "dcgan/checkpoint.hpp"
#include "dcgan/data.hpp"
#include "dcgan/error.hpp"
#include "dcgan/gradcheck.hpp"
#include "dcgan/image_io.hpp"
#include "dcgan/latent.hpp"
#include "dcgan/layers.hpp"
#include "dcgan/loss.hpp"
#include "dcgan/model.hpp"
#include "dcgan/rng.hpp"
#include "dcgan/tensor.hpp"
#include "dcgan/train.hpp"
