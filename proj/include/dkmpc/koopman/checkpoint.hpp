#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "dkmpc/koopman/koopman_model.hpp"
#include "dkmpc/koopman/training.hpp"

namespace dkmpc::koopman {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error
{
public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

/// JSON text; doubles are written in shortest round-trip form, so a reload
/// reproduces every parameter bit for bit.
std::string to_checkpoint_text(const KoopmanModel& model, const std::optional<TrainingConfig>& cfg = {});
KoopmanModel from_checkpoint_text(const std::string& text, TrainingConfig* cfg = nullptr);

void save_checkpoint(const std::string& path, const KoopmanModel& model,
                     const std::optional<TrainingConfig>& cfg = {});
KoopmanModel load_checkpoint(const std::string& path, TrainingConfig* cfg = nullptr);

}  // namespace dkmpc::koopman
