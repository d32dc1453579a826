#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace rmpc::cli {

struct CommonArgs {
  std::string config_path;
  std::string checkpoint_path; // optional for train/gradcheck
  std::string out_override;
  std::optional<std::uint64_t> seed_override;
};

int cmd_train(const CommonArgs& args);
int cmd_evaluate(const CommonArgs& args);
int cmd_benchmark(const CommonArgs& args);
int cmd_simulate(const CommonArgs& args);
int cmd_gradcheck(const CommonArgs& args);

}  // namespace rmpc::cli
