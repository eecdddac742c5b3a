// Writes synthetic clean/noisy PGM pairs and a manifest for the train and
// validate commands.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "anova/imaging.hpp"
#include "anova/synthetic.hpp"
#include "json.hpp"

int main(int argc, char** argv) {
    CLI::App cli{"Generate synthetic denoising data"};
    std::string dir = "demo_data";
    std::size_t count = 3;
    std::size_t height = 64;
    std::size_t width = 64;
    double noise = 30.0;
    std::uint64_t seed = 1;
    cli.add_option("-o,--output", dir, "Output directory");
    cli.add_option("-n,--count", count, "Number of image pairs");
    cli.add_option("--height", height, "Image height");
    cli.add_option("--width", width, "Image width");
    cli.add_option("--noise", noise, "Noise standard deviation");
    cli.add_option("--seed", seed, "First seed");
    CLI11_PARSE(cli, argc, argv);

    try {
        std::filesystem::create_directories(dir);
        nlohmann::json pairs = nlohmann::json::array();
        for (std::size_t t = 0; t < count; ++t) {
            const std::string name = "scene" + std::to_string(t);
            const anova::GrayImage clean = anova::make_scene(height, width, seed + t);
            const anova::GrayImage noisy = anova::add_gaussian_noise(clean, {noise, seed + 1000 + t});
            anova::save_image(clean, (std::filesystem::path(dir) / (name + "_clean.pgm")).string());
            anova::save_image(noisy, (std::filesystem::path(dir) / (name + "_noisy.pgm")).string());
            pairs.push_back({{"name", name}, {"clean", name + "_clean.pgm"}, {"noisy", name + "_noisy.pgm"}});
        }
        std::ofstream(std::filesystem::path(dir) / "manifest.json") << nlohmann::json{{"pairs", pairs}}.dump(2) << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
