"""Inverse Stefan problems via heat-series bases and simulated HHL."""
