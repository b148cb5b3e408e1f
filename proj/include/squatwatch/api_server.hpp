// Copyright 2026 the squatwatch authors
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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "squatwatch/alerts.hpp"
#include "squatwatch/metadata.hpp"

namespace squatwatch {

/// JSON API under /api/v1 for the triage console:
///   GET  /health
///   GET  /alerts?status=&registry=&category=&limit=&offset=
///   GET  /alerts/{id}
///   POST /alerts/{id}/verdict  {status, note?, add_to_allowlist?}
///   GET  /stats
///   POST /allowlist            {kind, value, action?}
/// Errors are {code, message} with the stable error-code names.
class ApiServer {
public:
    ApiServer(AlertStore& alerts, MetadataStore& store,
              std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Port 0 picks a free port. Returns the bound port. Throws PortInUse.
    int bind(const std::string& host, int port);
    /// Serves on a background thread.
    void start();
    /// Serves on the calling thread until stop().
    void listen();
    void stop();
    int port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace squatwatch
