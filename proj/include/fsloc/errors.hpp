// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace fsloc {

// Input-side failures: malformed files, bad manifests, impossible requests.
// The CLI maps these to exit status 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EpisodeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SpecError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Computation-side failures. The CLI maps these to exit status 2.
class ShapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fsloc
