/* Copyright 2026 The charnmt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CHARNMT_COMMON_ERROR_H_
#define CHARNMT_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace charnmt {

// Shapes of operands disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An id or index lies outside its valid range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A hyperparameter or argument is outside its allowed domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input exceeds a fixed model capacity (e.g. max positions).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Malformed or inconsistent input data (corpora, config files, line counts).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Misuse of the differentiation tape (non-scalar loss, loss off tape, ...).
class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Training diverged or cannot continue (non-finite loss, ...).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint integrity failures, distinguishable by type.
class CheckpointVersionError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointTruncatedError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointChecksumError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace charnmt

#endif  // CHARNMT_COMMON_ERROR_H_
