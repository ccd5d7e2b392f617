// SPDX-License-Identifier: Apache-2.0
//
// cqipred: per-resource-block channel quality measurement and prediction
// Copyright (C) 2026 the cqipred authors
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

#ifndef CQIPRED_ERRORS_HPP
#define CQIPRED_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cqipred {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A caller violated a documented precondition (bad value, bad shape, bad range).
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// File or socket level failure; message carries the path/endpoint.
class IoError : public Error {
  public:
    using Error::Error;
};

/// Text input (CSV, config file) that does not parse; message names the location.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Binary payload shorter/longer than its own header claims.
class FramingError : public Error {
  public:
    using Error::Error;
};

/// Structurally valid container whose declared contents are inconsistent
/// (bad magic on a file, header/payload shape mismatch, version skew).
class SchemaError : public Error {
  public:
    using Error::Error;
};

/// Wire-protocol violation on a frame stream (unknown magic at a frame boundary).
class ProtocolError : public Error {
  public:
    using Error::Error;
};

/// Data that parses but violates a value-level invariant (NaN/Inf where finite required).
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Operation needs more rows/samples than the input provides.
class InsufficientDataError : public Error {
  public:
    using Error::Error;
};

/// SINR estimation is undefined for the given pilot layout.
class EstimationError : public Error {
  public:
    using Error::Error;
};

/// Non-finite parameter/gradient/loss encountered during training.
class NumericalError : public Error {
  public:
    using Error::Error;
};

} // namespace cqipred

#endif // CQIPRED_ERRORS_HPP
