#pragma once

#include <httplib.h>

#include <json.hpp>

#include "slidetutor/error.hpp"
#include "slidetutor/service.hpp"

namespace slidetutor {

int http_status(Errc code);
json error_body(const Error& error);
json envelope(const std::string& session_id, std::size_t seq, const Utterance& u);
std::string sse_frame(const json& envelope);

void register_routes(httplib::Server& server, Service& service);

/// Blocks serving the API on the configured host and port.
void run_server(Service& service);

}  // namespace slidetutor
