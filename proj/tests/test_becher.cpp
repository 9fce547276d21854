#include <csa/field.hpp>
