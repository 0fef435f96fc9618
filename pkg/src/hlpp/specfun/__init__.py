"""Special functions and Fredholm-determinant numerics."""
