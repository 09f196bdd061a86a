"""
Entity state machines for sensors, the network coordinator, the cloud service
provider and users, plus the canonical wire messages and the phase drivers
that move them over a transport.
"""
