// Copyright 2026 The Lacuna Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lacuna {

// Base for every error the toolkit raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument violates an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Empty search pattern (Boyer-Moore, Aho-Corasick).
class InvalidPattern : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// A corpus line that is not valid JSON.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// A corpus record that parses but lacks a required field.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Structural problem with an input file (e.g. a timeline CSV without header).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A timeline row that violates an event rule.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t row, std::string rule, const std::string& detail)
      : Error("row " + std::to_string(row) + ": " + rule + ": " + detail),
        row_(row),
        rule_(std::move(rule)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& rule() const noexcept { return rule_; }

 private:
  std::size_t row_;
  std::string rule_;
};

// Cosine or TF-IDF similarity of a zero vector / empty text.
class UndefinedSimilarity : public Error {
 public:
  using Error::Error;
};

// Threshold tuning needs both classes present.
class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

// A statistical test whose inputs make the statistic undefined.
class DegenerateSample : public Error {
 public:
  using Error::Error;
};

// A required input file or upstream artifact is absent.
class MissingInput : public Error {
 public:
  explicit MissingInput(std::string path)
      : Error("missing input: " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace lacuna
