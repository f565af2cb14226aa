"""Two-tank simulation, derivative estimation and online fault detection."""
