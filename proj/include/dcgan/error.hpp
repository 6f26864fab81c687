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

#pragma once

#include <stdexcept>
#include <string>

namespace dcgan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not conform to an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument values (out-of-range rates, empty inputs, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Bad input data: volumes, lesion indices, dataset files.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incompatible checkpoint / dataset binary.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite losses or gradients during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcgan
