#include <pybind11/pybind11.h>
PYBIND11_MODULE(_plane6, m) { (void)m; }
