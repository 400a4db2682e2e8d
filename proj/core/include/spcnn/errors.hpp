#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spcnn {

// Shape or argument contract violated by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Object used out of sequence, e.g. a forward cache that no longer matches
// the parameters it is replayed against.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Missing, unreadable or malformed file. The message names the file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A loss component went non-finite, or the gradient exceeded its ceiling.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, std::size_t batch_index)
      : std::runtime_error(what), batch_index_(batch_index) {}

  std::size_t batch_index() const noexcept { return batch_index_; }

 private:
  std::size_t batch_index_;
};

}  // namespace spcnn
