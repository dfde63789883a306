// Copyright 2026 The milpilot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <memory>
#include <string>

#include "milpilot/error.hpp"
#include "milpilot/orchestrator/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace milpilot {

int HttpStatusFor(ErrorCode code);

// REST front end of an Orchestrator. POST and DELETE requests need
// "Authorization: Bearer <token>" when a token is configured.
class ApiServer {
 public:
  ApiServer(Orchestrator& orchestrator, std::string token);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds host:port (port 0 picks a free one) and returns the bound port, or -1.
  int Bind(const std::string& host, int port);
  // Serves until Stop(); call after Bind.
  bool Serve();
  void Stop();
  bool running() const;

 private:
  void Register();

  Orchestrator& orchestrator_;
  std::string token_;
  std::unique_ptr<httplib::Server> server_;
};

// Splits "host:port"; a bare port binds 127.0.0.1.
std::pair<std::string, int> ParseBindAddress(const std::string& bind);

}  // namespace milpilot
