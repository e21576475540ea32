#ifndef POCO_PROBE_HPP
#define POCO_PROBE_HPP

#include <vector>

#include "poco/model.hpp"

namespace poco {

/// Receptive-field probe: runs the encoder's linearized twin (ReLU removed,
/// max aggregation replaced with averaging), back-propagates a unit cotangent
/// from the summed latent of point_index, and returns the indices whose
/// coordinate-gradient L2 norm exceeds the threshold.
std::vector<std::size_t> receptive_field_probe(const PocoModel& model,
                                               const PointCloud& cloud,
                                               std::size_t point_index,
                                               double threshold = 1e-7);

}  // namespace poco

#endif
