# Sequential warped product verifier
