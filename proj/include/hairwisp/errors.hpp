#pragma once

#include <stdexcept>
#include <string>

namespace hairwisp {

// Root of every error the library throws. `stage()` names the pipeline
// stage so the CLI can report stage-tagged failures.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& message)
      : std::runtime_error(message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }
  virtual const char* kind() const noexcept { return "Error"; }

 private:
  std::string stage_;
};

#define HAIRWISP_DEFINE_ERROR(Name, Stage)                       \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& message)                    \
        : Error(Stage, message) {}                               \
    const char* kind() const noexcept override { return #Name; } \
  };

HAIRWISP_DEFINE_ERROR(IoError, "load")
HAIRWISP_DEFINE_ERROR(ParseError, "load")
HAIRWISP_DEFINE_ERROR(DimensionError, "load")
HAIRWISP_DEFINE_ERROR(ValidationError, "load")
HAIRWISP_DEFINE_ERROR(ConfigError, "config")
HAIRWISP_DEFINE_ERROR(ExtractionError, "extraction")
HAIRWISP_DEFINE_ERROR(MeshError, "meshing")
HAIRWISP_DEFINE_ERROR(ContractError, "meshing")
HAIRWISP_DEFINE_ERROR(SimulationFault, "simulation")
HAIRWISP_DEFINE_ERROR(WarpError, "warping")
HAIRWISP_DEFINE_ERROR(InpaintError, "compositing")
HAIRWISP_DEFINE_ERROR(DiagnoseError, "diagnose")

#undef HAIRWISP_DEFINE_ERROR

}  // namespace hairwisp
