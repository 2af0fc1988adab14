# Test package for the multitemporal unmixing toolkit
