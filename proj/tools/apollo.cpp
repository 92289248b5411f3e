// apollo: command-line front door for the propaganda annotation service.
//
//   apollo serve   --port N [--host H]
//   apollo analyze --input FILE [--provider rule|llm] [--mode M] [--user U]
//   apollo profile set|show|test ...
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 provider failure.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "apollo/config.hpp"
#include "apollo/server.hpp"
#include "apollo/service.hpp"

#ifndef APOLLO_DEFAULT_CONFIG
#define APOLLO_DEFAULT_CONFIG "data/config.json"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitProvider = 2;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const apollo::TransportError*>(&e) || dynamic_cast<const apollo::MalformedOutput*>(&e)) {
    return kExitProvider;
  }
  return kExitInvalid;
}

/// "neutral", "confirmatory", "opposing", "gradual" or "explicit:ECON,SOCIAL".
apollo::PersonalizationMode parse_mode_arg(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) return apollo::mode_from_json(nlohmann::json(s));
  if (apollo::parse_mode_kind(s.substr(0, colon)) != apollo::PersonalizationMode::Kind::ExplicitChoice) {
    throw apollo::InvalidArgument("only the explicit mode takes coordinates: '" + s + "'");
  }
  const std::string coords = s.substr(colon + 1);
  const auto comma = coords.find(',');
  if (comma == std::string::npos) throw apollo::InvalidArgument("explicit mode needs ECON,SOCIAL: '" + s + "'");
  try {
    return apollo::PersonalizationMode::explicit_choice(
        apollo::PoliticalPosition(std::stod(coords.substr(0, comma)), std::stod(coords.substr(comma + 1))));
  } catch (const std::logic_error&) {
    throw apollo::InvalidArgument("explicit mode coordinates are not numbers: '" + s + "'");
  }
}

struct Context {
  std::string config_path;
  std::string store_path;

  apollo::ServiceConfig config() const { return apollo::load_config(config_path); }

  std::shared_ptr<apollo::ProfileStore> store(const apollo::ServiceConfig& c) const {
    std::filesystem::path p = store_path;
    if (p.empty()) p = c.profile_store_path;
    if (p.empty()) p = "apollo_profiles.json";
    return std::make_shared<apollo::ProfileStore>(p);
  }

  apollo::AnalysisService service() const {
    auto c = config();
    auto data = apollo::load_service_data(c);
    auto s = store(c);
    return apollo::AnalysisService(std::move(c), std::move(data), std::move(s));
  }
};

int run_serve(const Context& ctx, std::optional<int> port_override, std::optional<std::string> host_override) {
  apollo::AnalysisService service = ctx.service();
  const int port = port_override.value_or(service.config().port);
  const std::string host = host_override.value_or(service.config().host);

  httplib::Server server;
  // Plain SO_REUSEADDR: the default also sets SO_REUSEPORT, which would let a
  // second instance share a port that is already taken.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  apollo::install_routes(server, service);

  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
    if (bound < 0) bound = 0;
  } else if (!server.bind_to_port(host, port)) {
    bound = 0;
  }
  if (bound <= 0) {
    std::cerr << "error: cannot listen on " << host << ":" << port << " (address in use or not permitted)\n";
    return kExitInvalid;
  }

  // Signals are consumed by a dedicated thread so stop() runs outside a handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread stopper([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  stopper.detach();

  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  server.listen_after_bind();
  return kExitOk;
}

int run_analyze(const Context& ctx, const std::string& input, const std::string& provider, const std::string& mode,
                const std::string& user, const std::string& title) {
  std::string text;
  try {
    text = apollo::read_file(input);
  } catch (const apollo::ConfigError&) {
    std::cerr << "error: cannot read input file " << input << "\n";
    return kExitInvalid;
  }
  apollo::AnalysisService service = ctx.service();
  apollo::AnalyzeRequest req;
  req.text = std::move(text);
  if (!provider.empty()) req.provider = provider;
  if (!mode.empty()) req.mode_override = parse_mode_arg(mode);
  if (!user.empty()) req.user_id = user;
  if (!title.empty()) req.title = title;
  std::cout << apollo::render(service.analyze(req));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propaganda technique annotation with steerable, disclosed explanation bias"};
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx;
  const char* env_config = std::getenv("APOLLO_CONFIG");
  ctx.config_path = env_config && *env_config ? env_config : APOLLO_DEFAULT_CONFIG;
  app.add_option("--config", ctx.config_path, "Service configuration file (JSON)");
  app.add_option("--store", ctx.store_path, "Profile store file (overrides the configuration)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::optional<int> port;
  std::optional<std::string> host;
  serve->add_option("--port", port, "Port to listen on (0 picks a free port)");
  serve->add_option("--host", host, "Address to bind");

  auto* analyze = app.add_subcommand("analyze", "Analyze an article and print the response document");
  std::string input, provider, mode, user, title;
  analyze->add_option("--input", input, "Article text file")->required();
  analyze->add_option("--provider", provider, "Detection provider")->check(CLI::IsMember({"rule", "llm"}));
  analyze->add_option("--mode", mode, "neutral|confirmatory|opposing|gradual|explicit:ECON,SOCIAL");
  analyze->add_option("--user", user, "User id whose profile drives personalization");
  analyze->add_option("--title", title, "Article title");

  auto* profile = app.add_subcommand("profile", "Manage user profiles");
  profile->require_subcommand(1);
  std::string profile_user;
  auto* pset = profile->add_subcommand("set", "Create or replace a profile");
  std::optional<double> economic, social;
  std::string pmode;
  bool ack = false;
  pset->add_option("--user", profile_user)->required();
  pset->add_option("--economic", economic, "Economic axis, -10 (left) .. 10 (right)");
  pset->add_option("--social", social, "Social axis, -10 (libertarian) .. 10 (authoritarian)");
  pset->add_option("--mode", pmode, "Personalization mode");
  pset->add_flag("--ack", ack, "Mark the bias disclaimer as acknowledged");
  auto* pshow = profile->add_subcommand("show", "Print a stored profile");
  pshow->add_option("--user", profile_user)->required();
  auto* ptest = profile->add_subcommand("test", "Score questionnaire responses and store the position");
  std::string responses_path;
  ptest->add_option("--user", profile_user)->required();
  ptest->add_option("--responses", responses_path, "JSON responses file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (serve->parsed()) return run_serve(ctx, port, host);
    if (analyze->parsed()) return run_analyze(ctx, input, provider, mode, user, title);

    apollo::AnalysisService service = ctx.service();
    if (pset->parsed()) {
      nlohmann::json body = nlohmann::json::object();
      if (economic.has_value() != social.has_value()) {
        throw apollo::InvalidArgument("--economic and --social must be given together");
      }
      if (economic) body["position"] = {{"economic", *economic}, {"social", *social}};
      else if (const auto existing = service.store().find(profile_user); existing && existing->position) {
        body["position"] = apollo::to_json(*existing->position);
      }
      if (!pmode.empty()) body["mode"] = apollo::to_json(parse_mode_arg(pmode));
      body["disclaimer_acknowledged"] = ack;
      std::cout << apollo::render(service.put_profile(profile_user, body));
    } else if (pshow->parsed()) {
      std::cout << apollo::render(service.get_profile(profile_user));
    } else if (ptest->parsed()) {
      std::cout << apollo::render(service.political_test(profile_user, apollo::read_json_file(responses_path)));
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}
