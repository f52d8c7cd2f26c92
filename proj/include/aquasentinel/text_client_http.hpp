#pragma once

// Opt-in HTTP text-generation client for report rendering. Kept out of the
// reporting core: nothing there performs network calls unless a caller
// explicitly constructs and passes one of these.

#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "aquasentinel/reporting.hpp"

namespace aqua {

class HttpTextClient final : public TextClient {
public:
    HttpTextClient(std::string endpoint, std::string model)
        : endpoint_(std::move(endpoint)), model_(std::move(model)) {}

    // POSTs {"model", "prompt"} to the endpoint; accepts either a plain-text
    // body or a JSON object with a "text" field.
    std::string generate(const std::string& prompt) override {
        auto scheme = endpoint_.find("://");
        auto sep = endpoint_.find('/', scheme == std::string::npos ? 0 : scheme + 3);
        std::string host = sep == std::string::npos ? endpoint_ : endpoint_.substr(0, sep);
        std::string path = sep == std::string::npos ? "/" : endpoint_.substr(sep);
        httplib::Client client(host);
        client.set_connection_timeout(5);
        nlohmann::json body{{"model", model_}, {"prompt", prompt}};
        auto res = client.Post(path, body.dump(), "application/json");
        if (!res || res->status != 200)
            throw std::runtime_error("text-generation endpoint failed: " + endpoint_);
        try {
            auto j = nlohmann::json::parse(res->body);
            if (j.is_object() && j.contains("text")) return j.at("text").get<std::string>();
        } catch (const nlohmann::json::exception&) {
        }
        return res->body;
    }

private:
    std::string endpoint_;
    std::string model_;
};

}  // namespace aqua
