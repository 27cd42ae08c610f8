# Runtime concerns shared by every heisenwave module
