"""Dynamic rays, itineraries and dimension experiments for cosine maps a e^z + b e^-z."""
