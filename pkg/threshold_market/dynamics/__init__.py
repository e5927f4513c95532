"""Spin-lattice dynamics of the threshold social-impact rule."""
