# Policy generator services: networks, environments, buffer, training and experiments
