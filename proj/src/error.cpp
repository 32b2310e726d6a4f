#include "lagvcm/error.hpp"

#include <sstream>

namespace lagvcm {

namespace {

std::string floor_message(double t, double density, double floor) {
    std::ostringstream os;
    os << "design density h(" << t << ") = " << density << " is below the floor " << floor;
    return os.str();
}

std::string rank_message(long rank, long columns) {
    std::ostringstream os;
    os << "design matrix is rank deficient: numerical rank " << rank << " of " << columns
       << " columns";
    return os.str();
}

} // namespace

DensityFloorError::DensityFloorError(double t, double density, double floor)
    : Error(floor_message(t, density, floor)), t_(t) {}

RankDeficientError::RankDeficientError(long rank, long columns)
    : Error(rank_message(rank, columns)), rank_(rank), columns_(columns) {}

RankDeficientError::RankDeficientError(const std::string& what)
    : Error(what), rank_(-1), columns_(-1) {}

} // namespace lagvcm
