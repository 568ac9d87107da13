#pragma once

#include <string>

#include "disclab/discrepancy.hpp"
#include "disclab/dmd.hpp"
#include "disclab/gpr.hpp"
#include "disclab/nn.hpp"
#include "disclab/sindy.hpp"

namespace disclab::io {

// JSON round-trips for fitted models. Complex arrays are emitted as
// [re, im] pairs; all floats carry 17 significant digits so values
// round-trip bit-exactly. The discrepancy envelope wraps the engine payload
// under a method tag (oracle models are not serializable).

std::string to_json(const sindy::SparseCoefficients& coeffs,
                    const sindy::LibrarySpec& spec);
void sindy_from_json(const std::string& text, sindy::SparseCoefficients* coeffs,
                     sindy::LibrarySpec* spec);

std::string to_json(const dmd::DmdModel& model);
dmd::DmdModel dmd_from_json(const std::string& text);

std::string to_json(const gpr::GprModel& model);
gpr::GprModel gpr_from_json(const std::string& text);

std::string to_json(const nn::MlpModel& model);
nn::MlpModel nn_from_json(const std::string& text);

std::string to_json(const discrepancy::DiscrepancyModel& model);
discrepancy::DiscrepancyModel discrepancy_from_json(const std::string& text);

}  // namespace disclab::io
