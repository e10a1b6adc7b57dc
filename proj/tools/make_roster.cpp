// Writes the built-in hand roster: one hand_spec_v1 file per hand, roster.json
// and the shared unit box mesh.

#include "dgd/hand_io.hpp"
#include "dgd/hand_roster.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Write the built-in hand roster"};
  std::string out = "data/hands";
  app.add_option("--out", out, "Output directory");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto roster = dgd::builtin_roster();
    dgd::save_roster(roster, out);
    for (const auto& h : roster) std::cout << h.class_id << ' ' << h.name << " dof " << h.dof() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
