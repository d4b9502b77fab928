// Copyright 2026 The cloak Authors
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

namespace cloak {

// Every failure carries a short machine-readable tag naming the check that
// failed ("ker-B", "dims", "key-invertibility", ...). The CLI surfaces the tag
// verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string check, const std::string& what)
      : std::runtime_error(check + ": " + what), check_(std::move(check)) {}

  const std::string& check() const noexcept { return check_; }

 private:
  std::string check_;
};

}  // namespace cloak
