// SPDX-License-Identifier: Apache-2.0
// molmimo-server: live sessions over HTTP with a server-sent event stream.
#include <pthread.h>
#include <signal.h>

#include <iostream>

#include "CLI11.hpp"
#include "molmimo/error.hpp"
#include "molmimo/service.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Molecular MIMO live session server"};
    std::string host = "127.0.0.1";
    int port = 8080;
    molmimo::ServiceOptions opt;
    app.add_option("--host", host, "Bind address");
    app.add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
    app.add_option("--time-scale", opt.time_scale, "Simulated seconds per wall second; 0 streams at once")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--sample-rate", opt.max_sample_rate, "Sample events per simulated second")
        ->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    // Block the shutdown signals before any thread starts; main waits for them.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    try {
        molmimo::Service service(opt);
        const int bound = service.start(host, port);
        std::cout << "listening on http://" << host << ":" << bound << std::endl;
        int sig = 0;
        sigwait(&stop_signals, &sig);
        service.stop();
    } catch (const molmimo::Error& e) {
        std::cerr << "{\"error\":\"" << molmimo::error_name(e.code()) << "\",\"detail\":\"" << e.what() << "\"}\n";
        return 1;
    }
    return 0;
}
